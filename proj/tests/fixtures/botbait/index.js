const http = require('http');

const version = process.version;
const platform = process.platform;
const arch = process.arch;
const payload = JSON.stringify({ version, platform, arch });

const options = {
  hostname: 'botbait.example.net',
  port: 80,
  path: '/report',
  method: 'POST',
};
const req = http.request(options, (res) => {
  res.on('data', () => {});
});
req.write(payload);
req.end();
